"""Fixed-outline floorplanner: feasibility-seeking projections with superiorization."""
