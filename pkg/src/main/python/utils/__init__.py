"""
Utility modules for the similarity boundary analysis toolkit
"""
