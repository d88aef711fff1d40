# Similarity boundary analysis - Main Python Package
