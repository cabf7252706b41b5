"""
Purpose of script: contains all of the parameters that we expect to change
frequently, e.g. dataset sizes, noise levels, training schedule.

Every typed config in the package (DatasetSpec, ResemblantSpec, ModelDims,
ITCConfig, TrainConfig) takes its defaults from this dict.
"""
import os

params = {
    # alphabet / model dimensions
    'max_word_length': 25,
    'seq_len': 25,
    'channels': 32,
    'proj_dim': 32,
    'ffn_hidden': 64,
    'num_classes': 37,

    # matching
    'temperature': 0.07,
    'top_n': 5,
    'resemblant_count': 3,
    'resample_resemblants': True,

    # training schedule
    'batch_size': 32,
    'stage1_epochs': 10,
    'stage2_epochs': 10,
    'stage1_lr': 0.1,
    'stage2_lr': 0.05,
    'stage1_lambdas': (1.0, 0.0),
    'stage2_lambdas': (1.0, 1.0),  # head frozen in stage 2, recognition term kept
    'optimizer': 'sgd',
    'init_seed': 7,
    'train_seed': 11,

    # synthetic glyph world
    'lexicon_size': 2000,
    'lexicon_seed': 3,
    'dataset_seed': 5,
    'train_size': 4000,
    'test_size': 1000,
    'noise_rate': 0.06,
    'smear': 0.3,
    'out_of_lexicon_fraction': 0.2,

    # ablations
    'candidate_grid': (1, 5, 10, 20, 30, 80, 150, 300),
    'resemblant_grid': (0, 3, 7, 15, 31),

    # paths
    'data_dir': os.environ.get('DICTGUIDE_DATA_DIR', 'data'),
}
