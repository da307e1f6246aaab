"""
Tests for the floyd toolkit.
"""
