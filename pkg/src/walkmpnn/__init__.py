"""Walk censuses and from-scratch MPNN layers (GCN, DGCNN, GAT, GIN-ε).

Under a constant initial feature, DGCNN and GAT give every node the same
representation, while GIN-0 and GCN representations are governed by
(normalized) walk counts. The modules here compute both sides and check
the relationship numerically.
"""

from .analysis import (
    CollisionWitness,
    CorrelationReport,
    DistanceSet,
    collapse_check,
    correlate,
    find_walk_collisions,
    pairwise_distances,
    pearson,
    proportionality_check,
    readout_census,
)
from .graph import (
    FIG2_KINDS,
    FIG2_RED_NODE,
    Graph,
    GraphCollection,
    SyntheticSpec,
    fig2_collection,
    generate,
    parse_edge_list,
    parse_synthetic,
    parse_tu_collection,
    random_corpus,
    to_edge_list,
)
from .lipschitz import (
    BoundReport,
    LipschitzProfile,
    layer_lipschitz,
    lipschitz_profile,
    spectral_norm,
    verify_bound,
)
from .model import (
    EmbeddingTable,
    LayerSpec,
    LinearLayer,
    MLPBlock,
    Model,
    build_model,
    dgcnn_layer,
    forward,
    gat_attention,
    gat_layer,
    gcn_layer,
    gin_layer,
    init_model,
    readout,
)
from .walks import (
    WalkTable,
    enumerate_normalized_walks_bruteforce,
    enumerate_walks_bruteforce,
    normalized_walk_sums,
    walk_counts,
)

__version__ = "0.1.0"
