"""
Sweeper - command-line front end: parameter grids, worker pool and table output.
"""
