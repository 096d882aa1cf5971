"""Unit test package for nlallee."""
