"""Test package for rnp-metric-certify."""
