import os
import pickle


def LoadData(path):
    with open(path, "rb") as handle:
        return pickle.load(handle)


def run(cmd):
    result = eval(cmd)
    unused = 3
    return result
