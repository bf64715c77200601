"""
KP Torus Lab package.
"""
