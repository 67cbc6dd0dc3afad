import threading

import pytest

from dlaas.coordstore import CoordStore
from dlaas.objectstore import FilesystemStore

# Verbatim manifest text in the stock format (resources, data stores,
# framework), including a hard-wrapped description.
STOCK_MANIFEST = """name: my-mnist-model
version: "1.0"
description: Caffe MNIST (Mixed National Institute of Standards and
Technology database) model running on GPUs. The MNIST database (Mixed
National Institute of Standards and Technology database) is a large database
of handwritten digits that is commonly used for training various image
processing systems.
Learners: 2
gpus: 2
memory: 8000MiB

data_stores:
- id: softlayer-object-storage
  type: softlayer_objectstore
  training_data:
    container: my_training_data
  training_results:
    container: my_training_results
  connection:
    auth_url: https://dal05.objectstorage.softlayer.net/auth/v1.0
    user_name: my-user-name
    password: my-password

framework:
  name: caffe
  version: "1"
  job: lenet_solver.prototxt
  arguments:
    weights: pretrained.caffemodel
"""


@pytest.fixture
def coord():
    store = CoordStore(sweep_interval=0.02)
    yield store
    store.close()


@pytest.fixture
def blob_store(tmp_path):
    return FilesystemStore(tmp_path / "objects")


def run_threads(n, fn):
    """Start n threads running fn(i), join them, re-raise the first error."""
    errors = []

    def wrap(i):
        try:
            fn(i)
        except BaseException as exc:  # noqa: BLE001 - surfacing to the test
            errors.append(exc)

    threads = [threading.Thread(target=wrap, args=(i,)) for i in range(n)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
