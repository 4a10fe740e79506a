# matrix_manager.py
import logging
import os

from tanner_graph import AlistParseError, generate_regular, load_alist, save_alist, validate

logger = logging.getLogger(__name__)


class MatrixManager:
    """Load-or-create cache of regular measurement matrices stored as alist files"""

    def __init__(self, cache_dir=None):
        self.cache_dir = cache_dir or os.environ.get('IPA_MATRIX_CACHE', 'matrices')
        self.ensure_cache_directory()

    def ensure_cache_directory(self):
        """Create cache directory if it doesn't exist"""
        os.makedirs(self.cache_dir, exist_ok=True)

    def cache_path(self, spec):
        return os.path.join(self.cache_dir, f"{spec.label}.alist")

    def create_matrix(self, spec):
        logger.info("🔧 Generating %s ...", spec.label)
        graph = generate_regular(spec)
        path = self.cache_path(spec)
        save_alist(graph, path)
        logger.info("✅ Matrix created and saved to %s", path)
        return graph

    def load_matrix(self, path, spec=None):
        """Load an alist file; with a spec, the graph must also match its shape and degrees"""
        graph = load_alist(path)
        if spec is not None:
            graph = graph.with_spec(spec)
        problems = validate(graph)
        if problems:
            raise ValueError(f"{path}: " + "; ".join(problems))
        logger.info("✅ Matrix loaded from %s", path)
        return graph

    def load_or_create(self, spec=None, path=None):
        """Explicit path wins; otherwise the cached file for spec, regenerated when unusable"""
        if path is not None:
            return self.load_matrix(path)
        if spec is None:
            raise ValueError("need a matrix spec or an alist path")

        cached = self.cache_path(spec)
        if os.path.exists(cached):
            try:
                return self.load_matrix(cached, spec)
            except (OSError, AlistParseError, ValueError) as e:
                logger.warning("❌ Failed to load %s: %s", cached, e)

        logger.info("🚀 Creating new matrix for %s", spec.label)
        return self.create_matrix(spec)
