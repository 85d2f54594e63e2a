"""Frozen reference facts for the canonical 38-class model."""

# (layer name, layer type, output shape at 224x224 input, parameter count)
CANONICAL_AUDIT = [
    ("plant_augmentation", "Sequential", (224, 224, 3), 0),
    ("rescale_0_1", "Rescaling", (224, 224, 3), 0),
    ("conv2d", "Conv2D", (224, 224, 32), 864),
    ("batch_normalization", "BatchNormalization", (224, 224, 32), 128),
    ("activation", "Activation", (224, 224, 32), 0),
    ("conv2d_1", "Conv2D", (224, 224, 32), 9_216),
    ("batch_normalization_1", "BatchNormalization", (224, 224, 32), 128),
    ("activation_1", "Activation", (224, 224, 32), 0),
    ("max_pooling2d", "MaxPooling2D", (112, 112, 32), 0),
    ("conv2d_2", "Conv2D", (112, 112, 64), 18_432),
    ("batch_normalization_2", "BatchNormalization", (112, 112, 64), 256),
    ("activation_2", "Activation", (112, 112, 64), 0),
    ("conv2d_3", "Conv2D", (112, 112, 64), 36_864),
    ("batch_normalization_3", "BatchNormalization", (112, 112, 64), 256),
    ("activation_3", "Activation", (112, 112, 64), 0),
    ("max_pooling2d_1", "MaxPooling2D", (56, 56, 64), 0),
    ("conv2d_4", "Conv2D", (56, 56, 128), 73_728),
    ("batch_normalization_4", "BatchNormalization", (56, 56, 128), 512),
    ("activation_4", "Activation", (56, 56, 128), 0),
    ("conv2d_5", "Conv2D", (56, 56, 128), 147_456),
    ("batch_normalization_5", "BatchNormalization", (56, 56, 128), 512),
    ("activation_5", "Activation", (56, 56, 128), 0),
    ("max_pooling2d_2", "MaxPooling2D", (28, 28, 128), 0),
    ("conv2d_6", "Conv2D", (28, 28, 256), 294_912),
    ("batch_normalization_6", "BatchNormalization", (28, 28, 256), 1_024),
    ("activation_6", "Activation", (28, 28, 256), 0),
    ("conv2d_7", "Conv2D", (28, 28, 256), 589_824),
    ("batch_normalization_7", "BatchNormalization", (28, 28, 256), 1_024),
    ("activation_7", "Activation", (28, 28, 256), 0),
    ("max_pooling2d_3", "MaxPooling2D", (14, 14, 256), 0),
    ("dropout", "Dropout", (14, 14, 256), 0),
    ("global_average_pooling2d", "GlobalAveragePooling2D", (256,), 0),
    ("dense", "Dense", (256,), 65_792),
    ("dropout_1", "Dropout", (256,), 0),
    ("predictions", "Dense", (38,), 9_766),
]

TRAINABLE_TOTAL = 1_248_774
NON_TRAINABLE_TOTAL = 1_920
GRAND_TOTAL = 1_250_694
PAYLOAD_BYTES = 5_002_776
