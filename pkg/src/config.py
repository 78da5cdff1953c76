import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

LOG_LEVEL = os.getenv("HIERARCHY_LOG_LEVEL", "WARNING")
TEMPLATES_DIR = Path(os.getenv("HIERARCHY_TEMPLATES_DIR", BASE_DIR / "templates"))
FIXTURES_DIR = Path(os.getenv("HIERARCHY_FIXTURES_DIR", BASE_DIR / "fixtures"))

# Size bounds for the exhaustive solvers
MAX_LEAF_EXACT_NODES = int(os.getenv("HIERARCHY_MAX_LEAF_EXACT_NODES", "10"))
CONDENSE_EXACT_VERTICES = int(os.getenv("HIERARCHY_CONDENSE_EXACT_VERTICES", "13"))
HOTLINK_EXACT_TARGETS = int(os.getenv("HIERARCHY_HOTLINK_EXACT_TARGETS", "20"))
MORPHO_LIMIT = int(os.getenv("HIERARCHY_MORPHO_LIMIT", "1000000"))
EXACT_SPACE_LIMIT = int(os.getenv("HIERARCHY_EXACT_SPACE_LIMIT", "200000"))
