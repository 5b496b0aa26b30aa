"""RFSS - small-signal analysis toolkit for a variable-gain cascode LNA"""
