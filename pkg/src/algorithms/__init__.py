# Solvers: deformation flows, minimax path search, Newton oracle