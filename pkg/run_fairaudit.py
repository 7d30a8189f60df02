import sys

from fairaudit.main import main

# Logging is configured by main() from --log-level / FAIRAUDIT_LOG_LEVEL
if __name__ == "__main__":
    sys.exit(main())
