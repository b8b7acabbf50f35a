# Periodic Mountain-Pass Toolkit Package