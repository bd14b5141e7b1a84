"""tem-video -- time encoding and exact reconstruction of periodic bandlimited video."""
