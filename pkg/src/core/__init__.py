# Core data containers, errors and settings
