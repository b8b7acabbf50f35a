# Problem Package: the space E_M, potentials, functionals