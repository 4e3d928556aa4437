"""
Sparse linear regression under a per-example attribute budget
"""
