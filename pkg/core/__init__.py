"""Core modules for the SEIRDV intervention model"""
