"""Test suite for hardsphere-lab"""
