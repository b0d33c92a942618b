"""Naive Bayes, decision tree, and linear SVM classifiers."""

from .base import MajorityModel, Model, Prediction, train_majority
from .naive_bayes import NaiveBayesModel, predict_nb, train_nb
from .persistence import dumps_model, load_model, save_model
from .svm import LinearSvmModel, predict_svm, train_svm
from .tree import DecisionTreeModel, Node, predict_tree, train_tree

TRAINERS = {
    "nb": train_nb,
    "tree": train_tree,
    "svm": train_svm,
    "majority": train_majority,
}

__all__ = [
    "DecisionTreeModel", "LinearSvmModel", "MajorityModel", "Model", "NaiveBayesModel", "Node",
    "Prediction", "TRAINERS", "dumps_model", "load_model", "predict_nb", "predict_svm",
    "predict_tree", "save_model", "train_majority", "train_nb", "train_svm", "train_tree",
]
