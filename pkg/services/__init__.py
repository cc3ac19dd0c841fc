"""Services package for the moving-planes lab."""
