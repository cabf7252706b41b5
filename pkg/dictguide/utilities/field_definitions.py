"""
Purpose of the script: contains the definitions for each of the fields
(columns) written by the dataset files and the evaluation reports. By keeping
the names in one place the writer, the reader and the schema file in docs/
cannot drift apart.
"""

# evaluation modes, in the order reports list them
MODES = ('baseline', 'ordinary', 'proposed')

# per-sample evaluation records
LABEL = 'label'
VISUAL_PREDICTION = 'visual_prediction'
FINAL_PREDICTION = 'final_prediction'
MODE = 'mode'
CORRECT = 'correct'
IN_LEXICON = 'in_lexicon'
record_fields = (LABEL, MODE, VISUAL_PREDICTION, FINAL_PREDICTION, CORRECT, IN_LEXICON)

# dataset file records
SPLIT = 'split'
CELLS = 'cells'
LABEL_LENGTH = 'label_length'
dataset_fields = (SPLIT, LABEL, LABEL_LENGTH, CELLS)

# ablation grids
AXIS_VALUE = 'value'
ACCURACY = 'accuracy'
