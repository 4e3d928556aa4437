# Config file and fingerprint helpers
