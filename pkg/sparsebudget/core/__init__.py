# Settings and error hierarchy
