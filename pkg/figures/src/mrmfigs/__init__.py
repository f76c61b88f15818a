"""Figure scripts for mrmlab outputs; coupled through files only."""
