# Landscape-aware performance regression - Main Package
