"""Decision-diagram equivalence checking for quantum circuits."""
