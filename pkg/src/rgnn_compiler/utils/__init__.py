"""Settings and file formats"""
