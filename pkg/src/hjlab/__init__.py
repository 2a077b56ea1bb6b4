"""Hamilton-Jacobi laboratory."""
