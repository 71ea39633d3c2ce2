import sys

from dotenv import load_dotenv

from src.routes.cli_routes import dispatch
from src.utils.logging_config import setup_logging

# Load environment variables
load_dotenv()


def main() -> int:
    setup_logging()
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
