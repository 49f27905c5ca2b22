#!/usr/bin/env python3
"""
Deterministic transmission across TAS access networks and a DIP core
Main application entry point
"""

import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent / "src"))

from src.cli.interface import cli


def main():
    """Main application entry point"""
    cli(prog_name="main.py")


if __name__ == "__main__":
    main()
