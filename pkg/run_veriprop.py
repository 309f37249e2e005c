#!/usr/bin/env python3
"""
Entry script for the veriprop command-line interface.

    python run_veriprop.py verify --summary s.json --ehr e.json -o report.json
"""
import sys
from pathlib import Path

# Add repository root and backend to path
root_path = Path(__file__).parent
sys.path.insert(0, str(root_path))
sys.path.insert(0, str(root_path / "backend"))

from app.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
