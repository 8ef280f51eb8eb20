"""Tests for dioph-spectrum."""
