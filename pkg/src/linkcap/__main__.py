"""
Main entry point for the linkcap package.
This allows running the package with: python -m linkcap
"""

from .cli import main

if __name__ == '__main__':
    main()
