"""Allow running the package with python -m looped_cli."""

from .main import main

if __name__ == "__main__":
    raise SystemExit(main())
