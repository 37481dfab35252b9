from .deploy_policies_tool.deploy_policies_tool import DeployPoliciesTool
from .detect_change_points_tool.detect_change_points_tool import DetectChangePointsTool
from .evaluate_policy_tool.evaluate_policy_tool import EvaluatePolicyTool
from .fit_hmm_tool.fit_hmm_tool import FitHmmTool
from .generate_bandit_log_tool.generate_bandit_log_tool import GenerateBanditLogTool
from .learn_policies_tool.learn_policies_tool import LearnPoliciesTool
from .run_experiment_tool.run_experiment_tool import RunExperimentTool
