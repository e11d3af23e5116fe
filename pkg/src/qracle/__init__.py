"""VQE training-data generation and graph-network parameter initialization.

The pipeline: build Pauli-sum Hamiltonians for several model families,
expand them to sparse Hermitian matrices, encode those as node/edge graphs,
label each instance with optimized ansatz parameters from a statevector
VQE, train a graph network to predict initializations, and benchmark the
predictions against random starts on initial loss, convergence speed, and
final-energy accuracy.
"""

from .autodiff import Adam, Tape, Tensor, adam_step, load_checkpoint, save_checkpoint
from .bench import (
    Scheme,
    SchemeResult,
    comparison_rows,
    cosine_similarity,
    evaluate_scheme,
    mre,
    report,
    smape,
)
from .gnn import (
    GnnConfig,
    GnnModel,
    gat_forward,
    gcn_forward,
    load_model,
    model_forward,
    predict_init,
    prepare_graph,
    save_model,
    train,
)
from .graph import (
    HamiltonianGraph,
    adjacency_weight,
    feature_dim,
    graph_from_json,
    graph_to_json,
    hamiltonian_to_graph,
)
from .models import (
    Application,
    CouplingGrid,
    InstanceMeta,
    bundled_h2_path,
    dump_h2,
    fermi_hubbard,
    heisenberg_xyz,
    ising_2d,
    load_h2,
    random_hamiltonian,
    sample_grid,
)
from .pauli import (
    FermionicTerm,
    PauliString,
    PauliSum,
    SparseHermitian,
    dumps_pauli_sum,
    expand_to_matrix,
    jordan_wigner,
    jordan_wigner_sum,
    loads_pauli_sum,
    min_eigenvalue,
    multiply_strings,
    pauli_matrix_entry,
)
from .pipeline import (
    SplitManifest,
    VqeRecord,
    build_dataset,
    load_dataset,
    save_dataset,
    split,
)
from .presets import PRESETS, ansatz_for, coupling_grid, label_dim
from .sim import (
    AnsatzFamily,
    AnsatzSpec,
    Scheduler,
    StateVector,
    VqeConfig,
    VqeTrace,
    apply_ansatz,
    expectation,
    parameter_shift_grad,
    run_vqe,
)

__version__ = "0.1.0"
