"""Models package - netlist, design and result types plus API schemas"""
