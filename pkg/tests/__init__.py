"""Tests for the modal_assembly package."""
