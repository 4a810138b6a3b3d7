from .core.aggregate import aggregate
from .core.agreement import agreement_sweep
from .core.evaluate import evaluate
from .core.filter_workers import filter_workers
from .core.gold import adjudicate_export, adjudicate_import, build_gold
from .core.import_crowd import import_crowd
from .core.label import label
from .core.mcnemar import compare
from .core.report import report
from .core.score import score
from .core.simulate import simulate
from .core.splits import splits
from .core.stability import stability
from .core.validate import validate
from .core.weighted_eval import weighted_eval
