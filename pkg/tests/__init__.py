# Tests package for dirichletlab
