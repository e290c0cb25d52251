"""HTTP surfaces and the ctxctl command line."""
