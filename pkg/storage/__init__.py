"""Storage modules for run configs and result tables"""
