"""Module entry point so ``python -m fisherpp`` works like the console script."""

from .cli import entrypoint

if __name__ == "__main__":
    raise SystemExit(entrypoint())
