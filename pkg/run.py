#!/usr/bin/env python3
"""
Entry point script for qag
"""

from qag.main import main

if __name__ == "__main__":
    main()
