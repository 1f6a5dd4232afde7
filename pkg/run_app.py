import sys
from pathlib import Path

# Ensure 'App_dev' is on sys.path when running from repo root
APP_DIR = Path(__file__).resolve().parent / "App_dev"
if str(APP_DIR) not in sys.path:
    sys.path.insert(0, str(APP_DIR))

from app.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
