"""Main entry point for the performance-regression pipeline."""
import os
import sys
import logging


def configure_logging(debug: bool = False) -> None:
    """Configure root logging on stdout."""
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout)
        ]
    )


logger = logging.getLogger(__name__)


def main(argv=None) -> int:
    """Main entry point."""
    from dotenv import load_dotenv
    from src.cli.app import run

    load_dotenv(override=False)
    configure_logging(os.environ.get("ELAPP_DEBUG", "").lower() in ("true", "1", "yes"))
    logger.debug("Starting pipeline command")
    return run(argv)


if __name__ == '__main__':
    sys.exit(main())
