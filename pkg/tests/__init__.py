"""Tests for the fivevertex package."""
