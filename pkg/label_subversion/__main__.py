"""python -m entry point"""

if __name__ == "__main__":
    from .commands import subvert

    subvert()
