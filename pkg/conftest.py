# Anchors pytest's rootdir on sys.path so `tests.*` and `tools.*` import
# regardless of how pytest is invoked.
