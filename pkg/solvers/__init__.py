"""
Backends for the three-cavity interferometer: exact truncated-Fock Lindblad
solution, Bogoliubov linearization and P-function mean-field.
"""
