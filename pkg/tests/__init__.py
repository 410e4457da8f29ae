"""
Test suite for the saddle-index package.
"""
