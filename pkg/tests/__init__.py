"""Tests for the lbtwarehouse simulator."""
