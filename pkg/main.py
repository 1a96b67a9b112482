#!/usr/bin/env python3
"""
Main entry point for the conformal energy command line
"""
from energy_cli.app import main

if __name__ == "__main__":
    main()
