"""Unit test package for guardband."""
