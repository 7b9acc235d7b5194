"""Unit tests for mollify."""
