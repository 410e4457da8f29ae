# config.py
import os
from pathlib import Path
from dotenv import load_dotenv

# Directory holding the modules (and an optional .env next to them)
application_path = Path(__file__).parent

env_path = application_path / '.env'

# Load .env file if it exists, otherwise use environment variables or defaults
if env_path.exists():
    load_dotenv(dotenv_path=env_path)
else:
    # Try to load from current working directory as fallback
    load_dotenv()

TOOL_NAME = 'saddle-index'
TOOL_VERSION = '1.0.0'
SCHEMA_VERSION = 1

# Monte Carlo defaults
SADDLE_SEED = int(os.getenv('SADDLE_SEED', 20240101))
SADDLE_THREADS = int(os.getenv('SADDLE_THREADS', 1))
SADDLE_SAMPLES = int(os.getenv('SADDLE_SAMPLES', 100000))
SADDLE_MAX_RESAMPLES = int(os.getenv('SADDLE_MAX_RESAMPLES', 5))

# Output and logging
SADDLE_OUTPUT_DIR = os.getenv('SADDLE_OUTPUT_DIR', 'output')
SADDLE_LOG_LEVEL = os.getenv('SADDLE_LOG_LEVEL', 'INFO')
