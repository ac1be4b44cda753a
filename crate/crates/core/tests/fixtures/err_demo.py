"""Demo."""

print(undefined_name)
