"""Association rule mining over quadrant count trees of a bitmap table."""
from .miner import MiningResult, bf_arm, trees_from_bitmap
from .model import AssociationRule, FrequentItemset, MiningConfig, parse_threshold
from .ptree import PTree, and_many, build, ptree_and, to_bits
from .schema import AttributeSchema, ItemCatalog, discretize, infer_schema, read_table

__version__ = "0.1.0"

__all__ = [
    "AssociationRule", "AttributeSchema", "FrequentItemset", "ItemCatalog", "MiningConfig",
    "MiningResult", "PTree", "and_many", "bf_arm", "build", "discretize", "infer_schema",
    "parse_threshold", "ptree_and", "read_table", "to_bits", "trees_from_bitmap",
]
