# Command-line surface
